"""Session fixtures for the worked examples.

The structure checks and reductions are pure and the resulting objects are
frozen, so both pipelines run once per session and every module reads from
the same instances.  Tests that need to exercise mutation or failure paths
build their own fresh state from the helpers module.
"""

from types import SimpleNamespace

import pytest

import helpers
from cinfstruct import reduction as rd
from cinfstruct import structures as st


@pytest.fixture(scope="session")
def dim4():
    ch = helpers.dim4_chart()
    Z1, Z2, X1, X2 = helpers.dim4_fields(ch)
    dist = st.Distribution(ch, (Z1, Z2))
    structure = st.check_cinf_structure(dist, (X1, X2))
    dual = st.dual_one_forms(structure)
    return SimpleNamespace(
        chart=ch,
        gens=(Z1, Z2),
        fields=(X1, X2),
        dist=dist,
        structure=structure,
        dual=dual,
    )


@pytest.fixture(scope="session")
def dim4_state():
    return helpers.dim4_reduced()


@pytest.fixture(scope="session")
def dim4_factors(dim4_state):
    return {e.level: e for e in rd.derive_factors(dim4_state)}


@pytest.fixture(scope="session")
def airy():
    state = helpers.airy_reduced()
    gens = state.structure.distribution.generators
    return SimpleNamespace(
        chart=state.chart,
        drift=gens[0],
        fields=state.structure.fields,
        structure=state.structure,
        dual=state.dual,
        state=state,
    )


@pytest.fixture(scope="session")
def airy_factors(airy):
    return {e.level: e for e in rd.derive_factors(airy.state)}
