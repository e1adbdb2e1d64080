"""FFT entry points with a thread cap read from GPWAVES_THREADS."""

import os

import scipy.fft as _sfft


def workers() -> int:
    raw = os.environ.get("GPWAVES_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def fftn(a, axes=None):
    return _sfft.fftn(a, axes=axes, workers=workers())


def ifftn(a, axes=None):
    return _sfft.ifftn(a, axes=axes, workers=workers())


def fft(a, axis=-1):
    return _sfft.fft(a, axis=axis, workers=workers())


def ifft(a, axis=-1):
    return _sfft.ifft(a, axis=axis, workers=workers())
