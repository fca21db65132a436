import functools
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from locforge.catalog import catalog_fusion, catalog_group, names  # noqa: E402

CATALOG = names()
SMALL = ["S4", "A4", "D8", "Q8", "SL23", "C3xC3:S3-wreath-slice"]


@functools.lru_cache(maxsize=None)
def fusion(name):
    return catalog_fusion(name)


@functools.lru_cache(maxsize=None)
def group(name):
    return catalog_group(name)


@functools.lru_cache(maxsize=None)
def natural_omega(name):
    from locforge.biset import natural_F_basic_set

    return natural_F_basic_set(fusion(name))


@functools.lru_cache(maxsize=None)
def omega_model(name):
    from locforge.locality import OmegaModel

    F = fusion(name)
    return OmegaModel(F, natural_omega(name), F.sc)


@functools.lru_cache(maxsize=None)
def natural(name):
    from locforge.locality import natural_locality

    return natural_locality(fusion(name), model=omega_model(name))


@functools.lru_cache(maxsize=None)
def perfect(name, seed=None):
    from locforge.perfect import build_perfect_locality

    return build_perfect_locality(fusion(name), seed=seed)


@pytest.fixture(params=CATALOG)
def name(request):
    return request.param
