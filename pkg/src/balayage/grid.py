"""Discrete manifolds: nodes, lumped volume weights and finite-volume stiffness.

Every manifold carries absolute nodal masses ``W`` (so a density ``f`` becomes
the mass vector ``f * W``) and a symmetric M-matrix ``K`` with ``v @ K @ v``
equal to the discrete Dirichlet energy.  The discrete Laplacian of ``v`` as a
mass vector is ``-K @ v``.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

_ids = itertools.count()


class Kind(str, enum.Enum):
    CIRCLE = "circle"
    SPHERE_LATLONG = "sphere_latlong"
    SYMMETRIC_PROFILE = "symmetric_profile"


class Boundary(str, enum.Enum):
    CLOSED = "closed"
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


@dataclass(frozen=True, eq=False)
class DiscreteManifold:
    kind: Kind
    node_coords: np.ndarray
    volume_weights: np.ndarray
    stiffness: sp.csr_matrix
    boundary: Boundary = Boundary.CLOSED
    boundary_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    dimension: int = 1
    spacing: float = 0.0
    meta: dict = field(default_factory=dict)
    uid: int = field(default_factory=lambda: next(_ids))

    @property
    def n_nodes(self) -> int:
        return self.volume_weights.shape[0]

    @property
    def total_volume(self) -> float:
        return float(self.volume_weights.sum())

    @property
    def is_closed(self) -> bool:
        """Constants lie in the kernel of K (closed or Neumann)."""
        return self.boundary is not Boundary.DIRICHLET

    def neighbours(self) -> list[np.ndarray]:
        K = self.stiffness
        out = []
        for i in range(self.n_nodes):
            cols = K.indices[K.indptr[i]:K.indptr[i + 1]]
            out.append(cols[cols != i])
        return out

    def laplacian_density(self, f: np.ndarray) -> np.ndarray:
        """Nodal approximation of the Laplace-Beltrami operator applied to f."""
        return -(self.stiffness @ f) / self.volume_weights

    def distance_from(self, location) -> np.ndarray:
        """Geodesic distance from ``location`` to every node."""
        if self.kind is Kind.CIRCLE:
            d = np.abs(self.node_coords - float(location)) % 1.0
            return np.minimum(d, 1.0 - d)
        if self.kind is Kind.SPHERE_LATLONG:
            theta0, phi0 = location
            th, ph = self.node_coords[:, 0], self.node_coords[:, 1]
            c = np.cos(th) * math.cos(theta0) + np.sin(th) * math.sin(theta0) * np.cos(ph - phi0)
            return np.arccos(np.clip(c, -1.0, 1.0))
        return np.abs(self.node_coords - float(location))

    def check_location(self, location) -> None:
        if self.kind is Kind.CIRCLE:
            x = float(location)
            if not 0.0 <= x < 1.0:
                raise ValueError(f"circle location {x} outside the chart [0, 1)")
        elif self.kind is Kind.SPHERE_LATLONG:
            theta, phi = location
            if not (0.0 <= theta <= math.pi and 0.0 <= phi <= 2 * math.pi):
                raise ValueError(f"sphere location {location} outside the chart")
        else:
            lo, hi = self.meta["interval"]
            if not lo <= float(location) <= hi:
                raise ValueError(f"profile location {location} outside [{lo}, {hi}]")

    def nearest_node(self, location) -> int:
        self.check_location(location)
        # argmin returns the lowest index on ties
        return int(np.argmin(self.distance_from(location)))

    def to_csv(self, path) -> None:
        coords = self.node_coords.reshape(self.n_nodes, -1)
        names = ["x"] if self.kind is Kind.CIRCLE else (
            ["theta", "phi"] if self.kind is Kind.SPHERE_LATLONG else ["r"])
        with open(path, "w") as fh:
            fh.write(",".join(["node", *names, "W"]) + "\n")
            for i in range(self.n_nodes):
                vals = [f"{c:.17g}" for c in coords[i]]
                fh.write(",".join([str(i), *vals, f"{self.volume_weights[i]:.17g}"]) + "\n")


def _assemble(n: int, rows, cols, cond, extra_diag: Optional[np.ndarray] = None) -> sp.csr_matrix:
    """Graph Laplacian from edge conductances (each undirected edge listed once)."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    cond = np.asarray(cond, dtype=float)
    diag = np.bincount(rows, cond, n) + np.bincount(cols, cond, n)
    if extra_diag is not None:
        diag = diag + extra_diag
    r = np.concatenate([rows, cols, np.arange(n)])
    c = np.concatenate([cols, rows, np.arange(n)])
    v = np.concatenate([-cond, -cond, diag])
    K = sp.coo_matrix((v, (r, c)), shape=(n, n)).tocsr()
    K.sum_duplicates()
    K.sort_indices()
    return K


def build_circle(n_nodes: int) -> DiscreteManifold:
    """Uniform periodic grid on R/Z with spacing 1/n_nodes."""
    if n_nodes < 3:
        raise ValueError("a circle needs at least 3 nodes")
    h = 1.0 / n_nodes
    idx = np.arange(n_nodes)
    K = _assemble(n_nodes, idx, (idx + 1) % n_nodes, np.full(n_nodes, 1.0 / h))
    return DiscreteManifold(
        kind=Kind.CIRCLE,
        node_coords=idx * h,
        volume_weights=np.full(n_nodes, h),
        stiffness=K,
        dimension=1,
        spacing=h,
        meta={"n_nodes": n_nodes, "geometry": "circle"},
    )


def build_sphere_latlong(n_theta: int, n_phi: int) -> DiscreteManifold:
    """Unit 2-sphere on a (theta, phi) grid with each pole collapsed to one node.

    Node 0 is the north pole (theta = 0), the last node the south pole.  Ring
    ``j = 1..n_theta-1`` sits at ``theta = j*pi/n_theta``.  Cell masses are the
    exact areas of the latitude bands (and of the polar caps).
    """
    if n_theta < 4 or n_phi < 4:
        raise ValueError("sphere grid needs n_theta >= 4 and n_phi >= 4")
    dth = math.pi / n_theta
    dph = 2 * math.pi / n_phi
    n_rings = n_theta - 1
    n = 2 + n_rings * n_phi
    south = n - 1

    theta_r = dth * np.arange(1, n_theta)
    phi_k = dph * np.arange(n_phi)

    def node(j, k):  # ring j in 0..n_rings-1
        return 1 + j * n_phi + (k % n_phi)

    coords = np.zeros((n, 2))
    coords[south, 0] = math.pi
    W = np.zeros(n)
    cap = 2 * math.pi * (1 - math.cos(dth / 2))
    W[0] = W[south] = cap
    for j, th in enumerate(theta_r):
        sl = slice(node(j, 0), node(j, 0) + n_phi)
        coords[sl, 0] = th
        coords[sl, 1] = phi_k
        W[sl] = dph * (math.cos(th - dth / 2) - math.cos(th + dth / 2))

    rows, cols, cond = [], [], []
    ks = np.arange(n_phi)
    for j, th in enumerate(theta_r):
        # along the ring
        rows.append(node(j, ks)); cols.append(node(j, ks + 1))
        cond.append(np.full(n_phi, dth / (math.sin(th) * dph)))
        # towards the next ring (or the south pole)
        face = math.sin(th + dth / 2) * dph / dth
        if j + 1 < n_rings:
            rows.append(node(j, ks)); cols.append(node(j + 1, ks))
        else:
            rows.append(node(j, ks)); cols.append(np.full(n_phi, south))
        cond.append(np.full(n_phi, face))
    rows.append(np.zeros(n_phi, dtype=int)); cols.append(node(0, ks))
    cond.append(np.full(n_phi, math.sin(dth / 2) * dph / dth))

    K = _assemble(n, np.concatenate(rows), np.concatenate(cols), np.concatenate(cond))
    return DiscreteManifold(
        kind=Kind.SPHERE_LATLONG,
        node_coords=coords,
        volume_weights=W,
        stiffness=K,
        dimension=2,
        spacing=dth,
        meta={"n_theta": n_theta, "n_phi": n_phi, "north": 0, "south": south,
              "geometry": "sphere2"},
    )


def build_symmetric_profile(
    weight_fn: Callable[[np.ndarray], np.ndarray],
    interval: tuple[float, float],
    surface_factor: float,
    n_cells: int,
    boundary: Boundary | str = Boundary.CLOSED,
    dimension: Optional[int] = None,
    geometry: str = "custom",
) -> DiscreteManifold:
    """Cell-centred grid for a rotationally symmetric manifold with volume
    element ``surface_factor * w(r) dr``.

    The left end is always a no-flux end (a pole, the centre of a ball, or a
    point where ``w`` vanishes).  The right end follows ``boundary``.
    """
    boundary = Boundary(boundary)
    r_lo, r_hi = map(float, interval)
    if n_cells < 2 or not r_hi > r_lo:
        raise ValueError("need n_cells >= 2 and a nonempty interval")
    if surface_factor <= 0:
        raise ValueError("surface_factor must be positive")
    h = (r_hi - r_lo) / n_cells
    r = r_lo + (np.arange(1, n_cells + 1) - 0.5) * h
    faces = r_lo + h * np.arange(1, n_cells)
    w_c = np.asarray(weight_fn(r), dtype=float) * np.ones_like(r)
    w_f = np.asarray(weight_fn(faces), dtype=float) * np.ones_like(faces)
    if np.any(w_c < 0) or np.any(w_f < 0):
        raise ValueError("weight function must be nonnegative")
    w_hi = float(weight_fn(np.array([r_hi]))[0])
    if boundary is Boundary.CLOSED:
        w_lo = float(weight_fn(np.array([r_lo]))[0])
        if abs(w_lo) > 1e-12 or abs(w_hi) > 1e-12:
            raise ValueError("closed profile requires w to vanish at both endpoints")

    extra = np.zeros(n_cells)
    bnodes = np.zeros(0, dtype=int)
    if boundary is Boundary.DIRICHLET:
        # zero value on the face r_hi, half a cell from the last centre
        extra[-1] = surface_factor * w_hi / (h / 2)
        bnodes = np.array([n_cells - 1])
    elif boundary is Boundary.NEUMANN:
        bnodes = np.array([n_cells - 1])

    idx = np.arange(n_cells - 1)
    K = _assemble(n_cells, idx, idx + 1, surface_factor * w_f / h, extra)
    if dimension is None:
        dimension = 1
    return DiscreteManifold(
        kind=Kind.SYMMETRIC_PROFILE,
        node_coords=r,
        volume_weights=surface_factor * w_c * h,
        stiffness=K,
        boundary=boundary,
        boundary_nodes=bnodes,
        dimension=dimension,
        spacing=h,
        meta={"interval": (r_lo, r_hi), "surface_factor": surface_factor,
              "n_cells": n_cells, "weight_fn": weight_fn, "geometry": geometry},
    )


def sphere_area(n: int) -> float:
    """Area of the unit sphere S^{n-1} in R^n (|S^0| = 2)."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def build_polar_sphere(n_cells: int, dim: int = 2) -> DiscreteManifold:
    """S^dim reduced to the polar angle: w = sin^{dim-1}, factor |S^{dim-1}|."""
    return build_symmetric_profile(
        lambda x: np.sin(x) ** (dim - 1), (0.0, math.pi), sphere_area(dim),
        n_cells, Boundary.CLOSED, dimension=dim, geometry=f"sphere{dim}")


def build_radial_ball(n: int, radius: float, n_cells: int,
                      boundary: Boundary | str = Boundary.DIRICHLET) -> DiscreteManifold:
    """Euclidean ball B(0, radius) in R^n reduced to the radial coordinate."""
    return build_symmetric_profile(
        lambda x: np.asarray(x, dtype=float) ** (n - 1), (0.0, radius), sphere_area(n),
        n_cells, boundary, dimension=n, geometry="flat")
