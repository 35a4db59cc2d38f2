import struct

import numpy as np
import pytest

ACCEPTANCE_LINES = []


def riff_wav(samples, sample_rate=16000, fmt_tag=1, bits=16, channels=1):
    """Hand-built RIFF/WAVE bytes, independent of any WAV library."""
    if isinstance(samples, bytes):
        payload = samples
    elif fmt_tag == 3:
        payload = np.asarray(samples, dtype="<f4").tobytes()
    else:
        payload = np.asarray(samples, dtype="<i2").tobytes()
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", fmt_tag, channels, sample_rate, sample_rate * block, block, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(payload)) + payload
    return b"RIFF" + struct.pack("<I", len(body)) + body


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split()[1]):
            terminalreporter.write_line(line)
