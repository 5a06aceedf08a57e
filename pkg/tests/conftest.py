"""Shared corpus builders and fixtures.

The synthetic corpora here mirror the measurement campaign shape: rooms x
positions x repeated samples, quiet and noisy conditions. Reverberation
estimation at PNR ~34 dB needs a generous noise-estimation tail and a
threshold above the noise-estimate uncertainty, hence CORPUS_NAER.
"""

import warnings

import numpy as np
import pytest

import roomecho as re
from roomecho.dataset import LabeledDataset
from roomecho.features import NaerParams, extract_features
from roomecho.filters import OCTAVE_CENTERS

FS = 24000.0
DURATION = 1.4
T_WINDOW = 1.3

# threshold well above the pseudo-noise drift, tail long enough to pin the
# noise floor; used for every extraction on PNR-34 corpora
CORPUS_NAER = NaerParams(per_noise=0.3, threshold=0.05)


def sample_seed(base: int, room: int, position: int, sample: int) -> int:
    return int(
        np.random.SeedSequence([base, room, position, sample]).generate_state(
            1, np.uint64
        )[0]
    )


def design_rooms(n_rooms: int = 10, seed: int = 123) -> list[dict]:
    """Ten rooms with distinct RT profiles, energy ratios and mode sets."""
    rng = np.random.default_rng(seed)
    base_rts = np.linspace(0.22, 1.00, n_rooms)
    dtrs = rng.uniform(-14.0, -4.0, n_rooms)
    rooms = []
    for i in range(n_rooms):
        tilt = rng.uniform(0.8, 1.25, size=len(OCTAVE_CENTERS))
        n_modes = int(rng.integers(4, 9))
        freqs = np.sort(rng.uniform(150.0, 4500.0, n_modes))
        energies = rng.uniform(0.01, 0.05, n_modes)
        rooms.append({
            "label": f"room{i:02d}",
            "rt_per_band": {
                float(c): float(max(0.10, base_rts[i] * t))
                for c, t in zip(OCTAVE_CENTERS, tilt)
            },
            "direct_to_reverb_db": float(dtrs[i]),
            "pnr_db": 34.0,
            "modes": tuple((float(f), float(e)) for f, e in zip(freqs, energies)),
        })
    return rooms


def sweep_rooms() -> list[dict]:
    """Six rooms whose band RTs are permutations of one value set.

    The multiset of decay rates is identical everywhere, so wideband
    energy features match across rooms and identification has to read the
    per-band decay structure — which needs the analysis window to cover
    the longest RT.
    """
    values = (0.80, 0.65, 0.52, 0.42, 0.34, 0.28)
    perms = [
        (0.80, 0.65, 0.52, 0.42, 0.34, 0.28),
        (0.28, 0.34, 0.42, 0.52, 0.65, 0.80),
        (0.52, 0.80, 0.34, 0.65, 0.28, 0.42),
        (0.42, 0.28, 0.65, 0.34, 0.80, 0.52),
        (0.65, 0.42, 0.80, 0.28, 0.52, 0.34),
        (0.34, 0.52, 0.28, 0.80, 0.42, 0.65),
    ]
    assert all(sorted(p) == sorted(values) for p in perms)
    return [
        {
            "label": f"sweep{i}",
            "rt_per_band": dict(zip(OCTAVE_CENTERS, perm)),
            "direct_to_reverb_db": -8.0,
            "pnr_db": 34.0,
        }
        for i, perm in enumerate(perms)
    ]


def build_dataset(
    rooms: list[dict],
    samples_per_position: int,
    positions: int = 2,
    seed: int = 0,
    t_window: float = T_WINDOW,
    duration: float = DURATION,
    sample_rate: float = FS,
    naer: NaerParams = CORPUS_NAER,
    pos_spread_db: float = 1.0,
    degrade: dict | None = None,
    noise_condition: str = "quiet",
    visit_id: str = "1",
) -> LabeledDataset:
    """Render rooms x positions x samples and extract fingerprints."""
    vectors, labels, positions_out = [], [], []
    for room_index, room in enumerate(rooms):
        for position in range(positions):
            offset = (position - (positions - 1) / 2.0) * pos_spread_db
            for sample in range(samples_per_position):
                rng_seed = sample_seed(seed, room_index, position, sample)
                spec = re.RoomSpec(
                    label=room["label"],
                    rt_per_band=room["rt_per_band"],
                    direct_to_reverb_db=room["direct_to_reverb_db"] + offset,
                    pnr_db=room["pnr_db"],
                    modes=room.get("modes", ()),
                    rng_seed=rng_seed,
                )
                rir = re.synth_rir(spec, duration, sample_rate)
                if degrade is not None:
                    rir = re.degrade_rir(
                        rir,
                        rng=np.random.default_rng(
                            np.random.SeedSequence([rng_seed, 0xB00])
                        ),
                        **degrade,
                    )
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    fv = extract_features(rir, t_window=t_window, naer=naer)
                vectors.append(fv.as_array())
                labels.append(room["label"])
                positions_out.append(str(position))
    n = len(labels)
    return LabeledDataset(
        features=np.vstack(vectors),
        labels=labels,
        visit_ids=[visit_id] * n,
        noise_conditions=[noise_condition] * n,
        position_ids=positions_out,
    )


@pytest.fixture(scope="session")
def ten_rooms():
    return design_rooms()


@pytest.fixture(scope="session")
def small_corpus(ten_rooms):
    """10 rooms x 2 positions x 6 samples; shared by the cheaper tests."""
    return build_dataset(ten_rooms, samples_per_position=6)


@pytest.fixture(scope="session")
def experiment_a_corpus(ten_rooms):
    """The full campaign analogue: 10 rooms x 2 positions x 50 samples."""
    return build_dataset(ten_rooms, samples_per_position=50)
