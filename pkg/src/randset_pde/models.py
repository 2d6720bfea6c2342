"""Quantity-of-interest models plugging the PDE solvers into the double loops.

Each model turns a substream draw plus one parameter-grid point into the
requested output: a nodal value or slice of the elliptic solution, or a
point value of the transport/wave solution.  The interval parameter is the
correlation length of the coefficient random field in all PDE models.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .characteristics import (
    DeterminacyRegion,
    TransportCoefficients,
    WaveMaterial,
    build_grids,
    reconstruct_displacement,
    solve_2x2_system,
    solve_transport,
    wave_to_system,
)
from .errors import ConfigError
from .fem import (
    StructuredMesh,
    assemble,
    build_mesh,
    element_coefficients,
    solve_cg,
)
from .fields import (
    CutoffField,
    ExpCovarianceParams,
    FieldEvaluator,
    GaussianDraw,
    kl_eigenpairs,
)
from .propagation import GaussianFamilyModel, ParameterGrid, QoISpec
from .randomsets import Interval
from .sampling import standard_normals

__all__ = [
    "EllipticModel",
    "TransportPointModel",
    "WavePointModel",
    "build_model",
]


class _KLBasisCache:
    """kl_eigenpairs per correlation length, built eagerly in prepare()."""

    def __init__(self, sigma: float, domain: Interval, m_pairs: int):
        self.sigma = sigma
        self.domain = domain
        self.m_pairs = m_pairs
        self._bases = {}

    def params(self, ell: float) -> ExpCovarianceParams:
        return ExpCovarianceParams(self.sigma, ell, self.domain)

    def prepare(self, ells) -> None:
        for ell in ells:
            key = float(ell)
            if key not in self._bases:
                self._bases[key] = kl_eigenpairs(self.params(key), self.m_pairs)

    def evaluator(self, ell: float, xi: np.ndarray) -> FieldEvaluator:
        key = float(ell)
        if key not in self._bases:
            self._bases[key] = kl_eigenpairs(self.params(key), self.m_pairs)
        return FieldEvaluator(self._bases[key], GaussianDraw(xi), self.params(key))


@dataclass
class EllipticModel:
    """Membrane displacement under a random coefficient field.

    The coefficient is a(x1,x2) = max(mean + q1(x1) q2(x2), a_min) with two
    independent 1-d KL fields evaluated on the unit interval.  Output is
    either the full slice along the grid row nearest ``slice_x2`` or the
    single nodal value nearest ``node``; the p-box component of a slice is
    the node nearest ``pbox_x1``.
    """

    mesh: StructuredMesh
    m_pairs: int
    sigma: float = 1.0
    a_min: float = 0.1
    mean: Union[float, Callable] = 1.0
    load: Union[float, Callable] = 1.0
    slice_x2: Optional[float] = None
    node: Optional[tuple] = None
    pbox_x1: Optional[float] = None
    rel_tol: float = 1e-10

    def __post_init__(self):
        if (self.slice_x2 is None) == (self.node is None):
            raise ConfigError("specify exactly one of slice_x2 or node")
        self._cache = _KLBasisCache(self.sigma, Interval(0.0, 1.0), self.m_pairs)
        if self.slice_x2 is not None:
            row = int(round(self.slice_x2 * self.mesh.ny))
            ids = self.mesh.grid_index[:, row]
            self._slice_ids = ids[ids >= 0]
            self.output_labels = self.mesh.nodes[self._slice_ids, 0]
            self.output_size = self._slice_ids.size
            x1 = self.pbox_x1 if self.pbox_x1 is not None else 0.5
            self.pbox_component = int(np.argmin(np.abs(self.output_labels - x1)))
        else:
            x1, x2 = self.node
            d2 = (self.mesh.nodes[:, 0] - x1) ** 2 + (self.mesh.nodes[:, 1] - x2) ** 2
            self._node_id = int(np.argmin(d2))
            self.output_labels = self.mesh.nodes[self._node_id:self._node_id + 1, 0]
            self.output_size = 1
            self.pbox_component = 0

    def prepare(self, grid: ParameterGrid) -> None:
        if grid.ndim != 1:
            raise ConfigError("elliptic model expects a 1-d correlation-length grid")
        self._cache.prepare(grid.axes[0])

    def draw(self, seed: int, index: int) -> np.ndarray:
        return standard_normals(seed, index, 4 * self.m_pairs)

    def evaluate(self, draw: np.ndarray, lam) -> np.ndarray:
        ell = float(lam[0])
        q1 = self._cache.evaluator(ell, draw[: 2 * self.m_pairs])
        q2 = self._cache.evaluator(ell, draw[2 * self.m_pairs:])

        def coefficient(x1, x2):
            mean = self.mean(x1, x2) if callable(self.mean) else self.mean
            return np.maximum(mean + q1.value(x1) * q2.value(x2), self.a_min)

        coeffs = element_coefficients(self.mesh, coefficient)
        solution = solve_cg(assemble(self.mesh, coeffs, self.load), rel_tol=self.rel_tol)
        if self.slice_x2 is not None:
            return solution.values[self._slice_ids]
        return solution.values[self._node_id:self._node_id + 1]


def _expression_or_value(spec):
    return spec if callable(spec) else float(spec)


@dataclass
class TransportPointModel:
    """Transport solution at one space-time point, speed = clipped KL field.

    a(x) = clip(a_mean + q(x), a_lo, a_hi) with the claimed speed bound
    max(|a_lo|, |a_hi|); the reaction f, source g, and initial datum u0 are
    fixed deterministic functions.
    """

    region: DeterminacyRegion
    nx: int
    nt: int
    m_pairs: int
    sigma: float
    a_mean: float
    a_lo: float
    a_hi: float
    f: Union[float, Callable]
    g: Union[float, Callable]
    u0: Union[float, Callable]
    point: tuple
    picard_tol: float = 1e-10
    max_sweeps: int = 100

    output_size = 1
    output_labels = None
    pbox_component = 0

    def __post_init__(self):
        if self.a_lo > self.a_hi:
            raise ConfigError("speed cutoff bounds out of order")
        bound = max(abs(self.a_lo), abs(self.a_hi))
        if bound > self.region.c + 1e-12:
            raise ConfigError("region speed bound is smaller than the speed cutoff")
        self._bound = bound
        self._cache = _KLBasisCache(self.sigma, Interval(-self.region.kappa, self.region.kappa),
                                    self.m_pairs)
        self._xs, self._ts = build_grids(self.region, self.nx, self.nt)
        if not self.region.contains(*self.point):
            raise ConfigError(f"evaluation point {self.point} outside the cone")

    def prepare(self, grid: ParameterGrid) -> None:
        if grid.ndim != 1:
            raise ConfigError("transport model expects a 1-d correlation-length grid")
        self._cache.prepare(grid.axes[0])

    def draw(self, seed: int, index: int) -> np.ndarray:
        return standard_normals(seed, index, 2 * self.m_pairs)

    def evaluate(self, draw: np.ndarray, lam) -> np.ndarray:
        ell = float(lam[0])
        speed_field = CutoffField(self._cache.evaluator(ell, draw),
                                  shift=self.a_mean, lo=self.a_lo, hi=self.a_hi)
        coeffs = TransportCoefficients(
            a=lambda x, t: speed_field.value(x),
            f=self.f, g=self.g, u0=self.u0,
            c=self._bound, a_time_dependent=False,
        )
        sol = solve_transport(coeffs, self.region, self._xs, self._ts,
                              picard_tol=self.picard_tol, max_sweeps=self.max_sweeps)
        i, j = sol.nearest_node(*self.point)
        return sol.values[j:j + 1, i]


@dataclass
class WavePointModel:
    """Rod displacement at one space-time point, modulus = clipped KL field.

    E(x) = clip(e_mean + q(x), e_min, e_max) with constant density, zero
    body force, initial displacement w (derivative w_prime supplied), zero
    initial velocity.  The speed bound is sqrt(e_max / rho).
    """

    region: DeterminacyRegion
    nx: int
    nt: int
    m_pairs: int
    sigma: float
    e_mean: float
    e_min: float
    e_max: float
    w: Callable
    w_prime: Callable
    point: tuple
    rho: float = 1.0
    picard_tol: float = 1e-10
    max_sweeps: int = 100

    output_size = 1
    output_labels = None
    pbox_component = 0

    def __post_init__(self):
        if not 0.0 < self.e_min <= self.e_max:
            raise ConfigError("need 0 < e_min <= e_max")
        if not self.rho > 0.0:
            raise ConfigError("density must be positive")
        bound = float(np.sqrt(self.e_max / self.rho))
        if bound > self.region.c + 1e-12:
            raise ConfigError("region speed bound is smaller than sqrt(e_max/rho)")
        self._bound = bound
        self._cache = _KLBasisCache(self.sigma, Interval(-self.region.kappa, self.region.kappa),
                                    self.m_pairs)
        self._xs, self._ts = build_grids(self.region, self.nx, self.nt)
        if not self.region.contains(*self.point):
            raise ConfigError(f"evaluation point {self.point} outside the cone")

    def prepare(self, grid: ParameterGrid) -> None:
        if grid.ndim != 1:
            raise ConfigError("wave model expects a 1-d correlation-length grid")
        self._cache.prepare(grid.axes[0])

    def draw(self, seed: int, index: int) -> np.ndarray:
        return standard_normals(seed, index, 2 * self.m_pairs)

    def evaluate(self, draw: np.ndarray, lam) -> np.ndarray:
        ell = float(lam[0])
        modulus = CutoffField(self._cache.evaluator(ell, draw),
                              shift=self.e_mean, lo=self.e_min, hi=self.e_max)
        a, f, g = wave_to_system(WaveMaterial(rho=self.rho, E=modulus, q=None))
        u01 = lambda x: -a(x) * self.w_prime(x)   # zero initial velocity
        u02 = lambda x: a(x) * self.w_prime(x)
        sol = solve_2x2_system(a, f, g, u01, u02, self.region, self._xs, self._ts,
                               picard_tol=self.picard_tol, max_sweeps=self.max_sweeps,
                               a_time_dependent=False)
        displacement = reconstruct_displacement(sol, self.w)
        i, j = sol.nearest_node(*self.point)
        return displacement[j:j + 1, i]


def build_model(qoi: QoISpec):
    """Instantiate the concrete model for a QoI specification."""
    scenario = dict(qoi.scenario)
    kind = qoi.model
    if kind == "gauss_identity":
        return GaussianFamilyModel()
    if kind in ("elliptic_node", "elliptic_slice"):
        mesh = scenario.pop("mesh", None)
        if mesh is None:
            mesh = build_mesh(scenario.pop("shape", "l_shape"),
                              scenario.pop("nx"), scenario.pop("ny"))
        if kind == "elliptic_slice":
            return EllipticModel(mesh=mesh, slice_x2=float(qoi.location[0]),
                                 pbox_x1=scenario.pop("pbox_x1", None), **scenario)
        return EllipticModel(mesh=mesh, node=(float(qoi.location[0]), float(qoi.location[1])),
                             **scenario)
    if kind == "transport_point":
        return TransportPointModel(point=tuple(qoi.location), **scenario)
    if kind == "wave_point":
        return WavePointModel(point=tuple(qoi.location), **scenario)
    raise ConfigError(f"unknown QoI model {kind!r}")
