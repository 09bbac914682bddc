import sys

import numpy as np
import pytest

from dickechaos import classical
from dickechaos.model import AncillaState, ModelParams, effective_params


def eff_for(lam=0.3, n=0, **kw):
    return effective_params(ModelParams(lam=lam, **kw), AncillaState.from_net(n))


@pytest.fixture(params=sorted(classical.KERNELS))
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
