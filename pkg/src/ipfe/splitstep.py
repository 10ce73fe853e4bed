"""Split-step Monte-Carlo oracle for classical angular spectra.

Each slab applies the symmetric (Strang) composition

    free_space(dz/2) . phase_screen . free_space(dz/2)

where the free-space half step multiplies the spectrum by
exp(i pi lambda dz |a|^2 / ...) and the screen is a position-domain
multiplication by exp(-i k n~_slab(x)).  Both factors are unitary on the
discrete norm.  Ensemble moments over independent screen sequences are the
empirical counterparts of the first- and second-order moment kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import FrequencyGrid, Spectrum, to_frequency, to_position
from .phase_screen import ScreenRealization, draw_screen, phase_screen_position
from .spectrum import TurbulenceModel, lambda_grid


@dataclass(frozen=True)
class PropagationPlan:
    grid: FrequencyGrid
    model: TurbulenceModel
    z_total: float
    n_slabs: int
    n_realizations: int
    master_seed: int

    def __post_init__(self) -> None:
        if self.n_slabs < 1:
            raise ValueError("n_slabs must be >= 1")
        if self.z_total < 0.0:
            raise ValueError("z_total must be >= 0")

    @property
    def dz(self) -> float:
        return self.z_total / self.n_slabs

    def check_guards(self) -> None:
        """Per-slab sampling and weak-scattering guards."""
        if self.z_total == 0.0:
            return
        a_max_sq = float(np.max(self.grid.freq_sq()))
        phase = np.pi * self.grid.wavelength * self.dz * a_max_sq
        if phase >= np.pi / 4.0:
            raise ValueError(
                f"sampling guard violated: pi*lambda*dz*a_max^2 = "
                f"{phase:.3e} >= pi/4")
        scatter = (self.grid.wavenumber ** 2
                   * lambda_grid(self.model, self.grid) * self.dz)
        if scatter >= 0.1:
            raise ValueError(
                f"weak-scattering guard violated: k^2*Lambda*dz = "
                f"{scatter:.3e} >= 0.1")

    def screen_seed(self, realization_index: int, slab_index: int) -> int:
        seq = np.random.SeedSequence(
            self.master_seed, spawn_key=(realization_index, slab_index))
        return int(seq.generate_state(1, np.uint64)[0])

    def slab_screen(self, realization_index: int,
                    slab_index: int) -> ScreenRealization:
        return draw_screen(self.model, self.grid, self.dz,
                           self.screen_seed(realization_index, slab_index))


def free_space_step(s: Spectrum, dz: float) -> Spectrum:
    """Multiply by the pure-phase free-space factor exp(i pi lambda dz |a|^2)."""
    phase = np.exp(1j * np.pi * s.grid.wavelength * dz * s.grid.freq_sq())
    return Spectrum(s.grid, s.values * phase)


def apply_screen(s: Spectrum, screen: ScreenRealization) -> Spectrum:
    """One-slab phase modulation exp(-i phi(x)) in the position domain."""
    if screen.grid != s.grid:
        raise ValueError("grid mismatch between spectrum and screen")
    phi = phase_screen_position(screen, s.grid.wavenumber)
    g = to_position(s) * np.exp(-1j * phi)
    return to_frequency(s.grid, g)


def propagate(s0: Spectrum, plan: PropagationPlan,
              realization_index: int) -> Spectrum:
    """One realization: Strang composition over all slabs."""
    plan.check_guards()
    if plan.z_total == 0.0:
        return s0.copy()
    s = s0
    half = plan.dz / 2.0
    for slab in range(plan.n_slabs):
        s = free_space_step(s, half)
        s = apply_screen(s, plan.slab_screen(realization_index, slab))
        s = free_space_step(s, half)
    return s


@dataclass
class EnsembleStats:
    """Monte-Carlo moments with per-element standard errors.

    second_moment[i, j] estimates <G(a_i) G*(a_j)> over flattened lattice
    sites; it is exactly Hermitian because every per-realization outer
    product is.  anomalous[i, j] estimates <G(a_i) G(a_j)>.
    """

    n_samples: int
    grid: FrequencyGrid
    mean_field: np.ndarray = field(repr=False)
    mean_field_se: np.ndarray = field(repr=False)
    second_moment: np.ndarray = field(repr=False)
    second_moment_se: np.ndarray = field(repr=False)
    anomalous: np.ndarray = field(repr=False)
    anomalous_se: np.ndarray = field(repr=False)


def _pairwise_mean(partials: list[np.ndarray]) -> np.ndarray:
    stacked = np.stack(partials)
    return np.sum(stacked, axis=0)


def ensemble_moments(s0: Spectrum, plan: PropagationPlan,
                     batch: int = 64) -> EnsembleStats:
    """Accumulate first/second moments over plan.n_realizations runs.

    Realizations are processed in index order and reduced with numpy's
    pairwise summation over fixed-size batches, so the result is
    bit-reproducible and numerically stable.
    """
    if plan.n_realizations < 2:
        raise ValueError("n_realizations must be >= 2")
    size = plan.grid.n ** plan.grid.dim

    sum_g: list[np.ndarray] = []
    sum_g2: list[np.ndarray] = []
    sum_gg_c: list[np.ndarray] = []
    sum_gg_c2: list[np.ndarray] = []
    sum_gg: list[np.ndarray] = []
    sum_gg2: list[np.ndarray] = []

    for start in range(0, plan.n_realizations, batch):
        stop = min(start + batch, plan.n_realizations)
        fields = np.empty((stop - start, size), dtype=np.complex128)
        for r in range(start, stop):
            fields[r - start] = propagate(s0, plan, r).values.ravel()
        outer_c = fields[:, :, None] * np.conj(fields[:, None, :])
        outer = fields[:, :, None] * fields[:, None, :]
        sum_g.append(np.sum(fields, axis=0))
        sum_g2.append(np.sum(np.abs(fields) ** 2, axis=0))
        sum_gg_c.append(np.sum(outer_c, axis=0))
        sum_gg_c2.append(np.sum(np.abs(outer_c) ** 2, axis=0))
        sum_gg.append(np.sum(outer, axis=0))
        sum_gg2.append(np.sum(np.abs(outer) ** 2, axis=0))

    n = plan.n_realizations
    mean_g = _pairwise_mean(sum_g) / n
    mean_g2 = _pairwise_mean(sum_g2) / n
    moment_c = _pairwise_mean(sum_gg_c) / n
    moment_c2 = _pairwise_mean(sum_gg_c2) / n
    moment = _pairwise_mean(sum_gg) / n
    moment2 = _pairwise_mean(sum_gg2) / n

    se_g = np.sqrt(np.maximum(mean_g2 - np.abs(mean_g) ** 2, 0.0) / n)
    se_c = np.sqrt(np.maximum(moment_c2 - np.abs(moment_c) ** 2, 0.0) / n)
    se_a = np.sqrt(np.maximum(moment2 - np.abs(moment) ** 2, 0.0) / n)

    return EnsembleStats(
        n_samples=n,
        grid=plan.grid,
        mean_field=mean_g.reshape(plan.grid.shape),
        mean_field_se=se_g.reshape(plan.grid.shape),
        second_moment=moment_c,
        second_moment_se=se_c,
        anomalous=moment,
        anomalous_se=se_a,
    )
