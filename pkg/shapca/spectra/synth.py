"""
Synthetic spectra generator
Spectra are sums of Gaussian bands whose amplitudes follow class-dependent latent
factors. Each band covers a block of adjacent points that move together, which mimics
the collinearity of neighbouring wavenumbers in real vibrational spectra.
"""
import logging
from pathlib import Path
from typing import List, Tuple

import numpy as np

from shapca.spectra.io import save_csv
from shapca.spectra.models import SpectraDataset, SpectralAxis
from shapca.utils.arrays import FloatArray, FrozenModel
from shapca.utils.files import format_csv, write_text_atomic

logger = logging.getLogger(__name__)

AXIS_RANGE = (400.0, 1800.0)
# amplitude shift between classes on informative bands, in latent std units
CLASS_SEPARATION = 5.0
LATENT_STD = 0.15


class SyntheticSpectra(FrozenModel):
    dataset: SpectraDataset
    factors: FloatArray        # N x (n_blocks + 2): band amplitudes, offset, slope
    templates: FloatArray      # (n_blocks + 2) x P
    factor_names: List[str]
    informative_blocks: List[int]


def band_templates(n_points: int, n_blocks: int, block_width: int) -> np.ndarray:
    """n_blocks Gaussian bands evenly spread over the axis, plus offset and ramp rows"""
    if n_points < 2:
        raise ValueError(f"n_points must be >= 2, got {n_points}")
    if n_blocks < 1 or block_width < 1:
        raise ValueError("n_blocks and block_width must be >= 1")
    if n_blocks * block_width > n_points:
        raise ValueError(f"{n_blocks} blocks of width {block_width} do not fit in {n_points} points")
    idx = np.arange(n_points, dtype=np.float64)
    spacing = n_points / n_blocks
    # a block spans +-2 sigma of its band
    sigma = block_width / 4.0
    rows = []
    for b in range(n_blocks):
        centre = spacing * (b + 0.5)
        rows.append(np.exp(-0.5 * ((idx - centre) / sigma) ** 2))
    rows.append(np.ones(n_points))
    rows.append(idx / (n_points - 1))
    return np.vstack(rows)


def make_synthetic(
    n_samples: int = 300,
    n_blocks: int = 10,
    block_width: int = 12,
    noise: float = 0.01,
    seed: int = 0,
    n_points: int = 200,
    n_classes: int = 2,
    n_informative: int = 3,
    spectra_per_group: int = 5,
) -> SyntheticSpectra:
    """Generate a labelled, grouped synthetic dataset"""
    if n_samples < 2 * n_classes:
        raise ValueError("n_samples must allow at least 2 spectra per class")
    if noise < 0:
        raise ValueError("noise must be non-negative")
    if n_classes < 2:
        raise ValueError("n_classes must be >= 2")
    if not 1 <= n_informative <= n_blocks:
        raise ValueError("n_informative must lie in [1, n_blocks]")
    if spectra_per_group < 1:
        raise ValueError("spectra_per_group must be >= 1")

    rng = np.random.default_rng(seed)
    templates = band_templates(n_points, n_blocks, block_width)

    n_groups = int(np.ceil(n_samples / spectra_per_group))
    group_of = np.repeat(np.arange(n_groups), spectra_per_group)[:n_samples]
    group_class = np.arange(n_groups) % n_classes
    labels = group_class[group_of]

    informative = sorted(rng.choice(n_blocks, size=n_informative, replace=False).tolist())
    shifts = np.zeros((n_classes, n_blocks))
    for c in range(n_classes):
        for j, b in enumerate(informative):
            # each class raises a different subset of informative bands
            shifts[c, b] = CLASS_SEPARATION * LATENT_STD * (1.0 if (c + j) % n_classes == 0 else -1.0)

    group_effect = rng.normal(0.0, LATENT_STD / 2, size=(n_groups, n_blocks))
    amplitudes = (
        1.0
        + shifts[labels]
        + group_effect[group_of]
        + rng.normal(0.0, LATENT_STD / 2, size=(n_samples, n_blocks))
    )
    offset = rng.uniform(0.2, 0.4, size=n_samples)
    slope = rng.uniform(0.0, 0.3, size=n_samples)
    factors = np.column_stack([amplitudes, offset, slope])

    intensities = factors @ templates
    if noise > 0:
        intensities = intensities + rng.normal(0.0, noise, size=intensities.shape)

    axis = SpectralAxis(values=np.linspace(AXIS_RANGE[0], AXIS_RANGE[1], n_points), unit_label="cm-1")
    dataset = SpectraDataset(
        axis=axis,
        intensities=intensities,
        labels=labels,
        class_names=[f"class_{c}" for c in range(n_classes)],
        sample_ids=[f"S{i:04d}" for i in range(n_samples)],
        groups=[f"P{g:03d}" for g in group_of],
    )
    names = [f"band_{b}" for b in range(n_blocks)] + ["offset", "slope"]
    logger.info(f"Synthesized {n_samples} spectra, {n_blocks} bands, informative={informative}")
    return SyntheticSpectra(
        dataset=dataset,
        factors=factors,
        templates=templates,
        factor_names=names,
        informative_blocks=informative,
    )


def write_synthetic(synth: SyntheticSpectra, out_dir: Path) -> Tuple[Path, Path]:
    """Write spectra.csv and latent_factors.csv"""
    out_dir = Path(out_dir)
    spectra_path = save_csv(synth.dataset, out_dir / "spectra.csv")
    ds = synth.dataset
    rows = [
        [ds.sample_ids[i], ds.class_names[int(ds.labels[i])]] + [float(v) for v in synth.factors[i]]
        for i in range(ds.n_samples)
    ]
    factors_path = write_text_atomic(
        out_dir / "latent_factors.csv",
        f"# informative_blocks={synth.informative_blocks}\n"
        + format_csv(["sample_id", "label"] + synth.factor_names, rows),
    )
    return spectra_path, factors_path
