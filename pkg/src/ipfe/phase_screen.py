"""Slab-integrated refractive-index screens with Markov-slab statistics.

Each screen holds Fourier coefficients N~(a) of the slab-integrated index
fluctuation.  Targets:

    E[N~(a)] = 0
    E[|N~(a)|^2] = Phi_n(a, 0) * dz / delta_a^D
    N~(-a) = N~(a)*          (real position-domain fluctuation)

Coefficients are drawn independently on a Hermitian half-lattice and
mirrored; a fixed seed reproduces a screen bit for bit.  Seeding uses the
counter-based Philox generator keyed through numpy SeedSequence, so screens
for different (realization, slab) pairs can be generated in parallel.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .grid import FrequencyGrid, Spectrum, to_position
from .spectrum import SpectrumKind, TurbulenceModel, psd_lattice


@dataclass
class ScreenRealization:
    grid: FrequencyGrid
    n_tilde_hat: np.ndarray = field(repr=False)
    dz: float
    seed: int

    def __post_init__(self) -> None:
        self.n_tilde_hat = np.asarray(self.n_tilde_hat, dtype=np.complex128)
        if self.n_tilde_hat.shape != self.grid.shape:
            raise ValueError("screen shape does not match grid")


def _mirror_indices(n: int, dim: int):
    """Index arrays mapping each lattice site to its -a partner.

    With DC-centered indexing the mirror of index j is (n - j) % n; the DC
    site (j = n/2) and the Nyquist site (j = 0) are self-conjugate.
    """
    axis = np.arange(n)
    mirror_axis = (n - axis) % n
    if dim == 1:
        return (mirror_axis,)
    grids = np.meshgrid(*([mirror_axis] * dim), indexing="ij")
    return tuple(grids)


def _half_lattice_mask(n: int, dim: int):
    """Boolean masks (canonical_half, self_conjugate) over the lattice."""
    idx = np.indices((n,) * dim)
    flat = idx[0]
    mflat = (n - idx[0]) % n
    for d in range(1, dim):
        flat = flat * n + idx[d]
        mflat = mflat * n + (n - idx[d]) % n
    self_conj = flat == mflat
    canonical = flat < mflat
    return canonical, self_conj


def draw_screen(model: TurbulenceModel, grid: FrequencyGrid, dz: float,
                seed: int) -> ScreenRealization:
    """Draw one Gaussian slab screen; deterministic in (seed, grid, model, dz)."""
    if dz <= 0.0:
        raise ValueError("dz must be positive")
    if model.kind is SpectrumKind.KOLMOGOROV and model.cn2 != 0.0:
        raise ValueError(
            "Kolmogorov model rejected: divergent DC screen variance")
    if (model.kind is SpectrumKind.VON_KARMAN
            and model.outer_scale > 1.0 / grid.delta_a):
        warnings.warn(
            "outer scale exceeds grid support (L0 > 1/delta_a); screen "
            "statistics will miss the largest eddies", stacklevel=2)

    variance = psd_lattice(model, grid) * dz * grid.delta_weight
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    # Fixed draw order: one real pair per lattice site, then Hermitianize.
    re = rng.standard_normal(grid.shape)
    im = rng.standard_normal(grid.shape)

    canonical, self_conj = _half_lattice_mask(grid.n, grid.dim)
    coeff = np.sqrt(variance / 2.0) * (re + 1j * im)
    coeff[self_conj] = np.sqrt(variance[self_conj]) * re[self_conj]
    mirror = _mirror_indices(grid.n, grid.dim)
    keep = canonical | self_conj
    coeff = np.where(keep, coeff, np.conj(coeff[mirror]))
    return ScreenRealization(grid, coeff, dz, seed)


def phase_screen_position(screen: ScreenRealization, k: float) -> np.ndarray:
    """Position-domain phase phi(x) = k * n~_slab(x) in radians."""
    field_x = to_position(Spectrum(screen.grid, screen.n_tilde_hat))
    rms = np.sqrt(np.mean(np.abs(field_x) ** 2))
    imag_residue = np.max(np.abs(field_x.imag)) if rms > 0 else 0.0
    if rms > 0 and imag_residue > 1e-12 * rms:
        raise ValueError(
            f"Hermitian-symmetry violation: imaginary residue "
            f"{imag_residue:.3e} exceeds 1e-12 of RMS {rms:.3e}")
    return k * field_x.real


@dataclass
class ScreenStatistics:
    """Empirical screen statistics from n_samples independent draws."""

    n_samples: int
    target_variance: np.ndarray
    sample_variance: np.ndarray
    variance_se: np.ndarray
    max_rel_deviation: float
    cross_pairs: list  # (site_a, site_b, |cov|, se)
    max_cross_sigma: float


def screen_statistics(model: TurbulenceModel, grid: FrequencyGrid, dz: float,
                      n_samples: int, seed: int,
                      n_cross_pairs: int = 64) -> ScreenStatistics:
    """Per-mode sample variance against target, plus cross-mode covariances
    for a random sample of non-mirror site pairs."""
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    target = psd_lattice(model, grid) * dz * grid.delta_weight

    sum_sq = np.zeros(grid.shape)
    sum_quad = np.zeros(grid.shape)

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    flat_size = grid.n ** grid.dim
    pairs_idx = []
    mirror = _mirror_indices(grid.n, grid.dim)
    mirror_flat = np.ravel_multi_index(
        tuple(np.asarray(m) for m in mirror), grid.shape).ravel()
    while len(pairs_idx) < n_cross_pairs:
        i, j = rng.integers(0, flat_size, size=2)
        if i == j or mirror_flat[i] == j:
            continue
        pairs_idx.append((int(i), int(j)))
    cross_sum = np.zeros(len(pairs_idx), dtype=np.complex128)
    cross_sq = np.zeros(len(pairs_idx))

    child_seeds = np.random.SeedSequence(seed).spawn(n_samples)
    for child in child_seeds:
        sub = child.generate_state(1, np.uint64)[0]
        coeff = draw_screen(model, grid, dz, int(sub)).n_tilde_hat
        p = np.abs(coeff) ** 2
        sum_sq += p
        sum_quad += p ** 2
        flat = coeff.ravel()
        prods = flat[[a for a, _ in pairs_idx]] * np.conj(
            flat[[b for _, b in pairs_idx]])
        cross_sum += prods
        cross_sq += np.abs(prods) ** 2

    var = sum_sq / n_samples
    var_of_p = np.maximum(sum_quad / n_samples - var ** 2, 0.0)
    var_se = np.sqrt(var_of_p / n_samples)
    if np.all(target == 0.0):
        max_rel = float(np.max(np.abs(var)))
    else:
        max_rel = float(np.max(np.abs(var / target - 1.0)))

    cross_mean = cross_sum / n_samples
    cross_var = np.maximum(cross_sq / n_samples - np.abs(cross_mean) ** 2, 0.0)
    cross_se = np.sqrt(cross_var / n_samples)
    records = []
    sigmas = []
    for idx, (a, b) in enumerate(pairs_idx):
        se = cross_se[idx]
        mag = abs(cross_mean[idx])
        records.append((a, b, mag, se))
        sigmas.append(mag / se if se > 0 else 0.0)
    return ScreenStatistics(
        n_samples=n_samples,
        target_variance=target,
        sample_variance=var,
        variance_se=var_se,
        max_rel_deviation=max_rel,
        cross_pairs=records,
        max_cross_sigma=float(max(sigmas) if sigmas else 0.0),
    )
