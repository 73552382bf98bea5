import math

import pytest

from pcfm.geometry import Channel, FrequencyRectangle, WdmComb
from pcfm.spp import PowerProfile

# standard fiber used throughout
B_CH = 64e9
SPACING = 75e9
SPAN = 80e3
BETA2 = -21.7e-27
GAMMA = 1.3e-3
F0 = 193.4e12


def sci_rect(b=B_CH):
    return FrequencyRectangle(-b / 2, b / 2, -b / 2, b / 2)


def comb_of(n, cut=None, spacing=SPACING, bw=B_CH, psd=1.5625e-14):
    chans = [Channel(i, F0 + (i - (n - 1) / 2) * spacing, bw, psd, "ssmf") for i in range(n)]
    return WdmComb(tuple(chans), (n - 1) // 2 if cut is None else cut)


@pytest.fixture
def ssmf():
    return PowerProfile.exponential_db(0.2, SPAN)


@pytest.fixture
def rects():
    """SCI, near-XCI and far-MCI rectangles of the 5-channel grid."""
    return {
        "sci": sci_rect(),
        "xci": FrequencyRectangle(SPACING - B_CH / 2, SPACING + B_CH / 2, -B_CH / 2, B_CH / 2),
        "mci": FrequencyRectangle(2 * SPACING - B_CH / 2, 2 * SPACING + B_CH / 2,
                                  -SPACING - B_CH / 2, -SPACING + B_CH / 2),
    }


def rel(a, b):
    return abs(a - b) / abs(b) if b != 0 else abs(a)


@pytest.fixture
def relerr():
    return rel




# acceptance lines, echoed in the terminal summary so they survive output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
