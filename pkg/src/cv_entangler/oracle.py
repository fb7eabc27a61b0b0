"""Monte Carlo reference for the dense-coding chain.

Samples realizations of the six state quadratures and the two signals, and
pushes them through the decoder one operation at a time with plain array
arithmetic.  It shares nothing with :func:`densecoding.propagate` beyond the
definition of the chain, so the two can check each other.

Noise and signal are propagated as separate sample streams (the chain is
linear).  Noise powers are sample second moments.  Signal gains are
recovered by least squares from the signal stream; a linear chain makes
them exact, so one chunk of signal samples is enough.  Everything is in
``<x^2>`` units (vacuum = 1/2): the S/N ratios are unit-free.
"""

import math
from dataclasses import dataclass

import numpy as np

CHUNK = 1 << 16


@dataclass(frozen=True)
class SampledChain:
    signal: tuple
    noise: tuple
    samples: int

    @property
    def snr(self):
        return tuple(s / n for s, n in zip(self.signal, self.noise))

    @property
    def capacity(self):
        return sum(0.5 * math.log1p(x) for x in self.snr)


def decode(xa, pa, xb, pb, xc, pc, t1, t2, g):
    """Run one batch of realizations through the decoder; return the two readouts."""
    r1 = math.sqrt(max(0.0, 1.0 - t1 * t1))
    r2 = math.sqrt(max(0.0, 1.0 - t2 * t2))
    xb, xc = t1 * xb + r1 * xc, r1 * xb - t1 * xc
    pb, pc = t1 * pb + r1 * pc, r1 * pb - t1 * pc
    pbar = pc
    pb = pb + g * pbar
    x_out = t2 * xa + r2 * xb
    p_out = r2 * pa - t2 * pb
    return x_out, p_out


def _sqrt_cov(gamma):
    w, v = np.linalg.eigh(0.5 * np.asarray(gamma, dtype=float))
    return v * np.sqrt(np.clip(w, 0.0, None))


def sample_chain(gamma, t1, t2, g, P, samples, rng):
    """Sampled signal and noise powers of the two readouts (``x`` on A, ``p`` on B)."""
    root = _sqrt_cov(gamma)
    noise = np.zeros(2)
    done = 0
    while done < samples:
        m = min(CHUNK, samples - done)
        quads = root @ rng.standard_normal((6, m))
        outs = decode(*quads, t1, t2, g)
        noise += [out @ out for out in outs]
        done += m

    m = min(CHUNK, samples)
    signals = rng.standard_normal((2, m)) * math.sqrt(P)
    zero = np.zeros(m)
    outs = decode(signals[0], signals[1], zero, zero, zero, zero, t1, t2, g)
    signal = []
    for out in outs:
        gains, *_ = np.linalg.lstsq(signals.T, out, rcond=None)
        signal.append(float(P * np.sum(gains**2)))
    return SampledChain(signal=tuple(signal), noise=tuple(noise / samples), samples=samples)
