"""Micro-benchmarks for the crypto, ledger and kernel hot paths.

Each benchmark yields :class:`BenchRow` records; :func:`rows_csv` renders
them under :data:`BENCH_HEADER`.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _backend
from .crypto import dlog_recover, encode, encrypt_exponent, fold, generate_group, hom_combine, keygen
from .crypto.dlog import _baby_steps
from .crypto.noise import sigma_parameters
from .ledger import Chain
from .rng import make_rng

BENCH_HEADER = "operation,backend,parameter,iterations,total_s,per_op_us,ops_per_s"


@dataclass(frozen=True)
class BenchRow:
    operation: str
    backend: str
    parameter: str
    iterations: int
    total_s: float

    @property
    def per_op_us(self) -> float:
        return self.total_s / self.iterations * 1e6

    @property
    def ops_per_s(self) -> float:
        return self.iterations / self.total_s if self.total_s > 0 else float("inf")

    def csv(self) -> str:
        return (f"{self.operation},{self.backend},{self.parameter},{self.iterations},"
                f"{self.total_s:.6f},{self.per_op_us:.3f},{self.ops_per_s:.1f}")


def rows_csv(rows) -> str:
    return BENCH_HEADER + "\n" + "".join(r.csv() + "\n" for r in rows)


def _timed(fn, iterations):
    t0 = time.perf_counter()
    for _ in range(iterations):
        fn()
    return time.perf_counter() - t0


def bench_crypto(bits=128, bound=2 ** 20, iterations=200, seed=0):
    """Encryption throughput, homomorphic folds and one worst-case BSGS recovery."""
    params = generate_group(bits, seed=seed)
    rng = make_rng(seed)
    kp = keygen(params, rng)
    tag = f"bits={bits}"
    cts = [encrypt_exponent(kp.pk, i, params, rng) for i in range(iterations)]
    yield BenchRow("encrypt", "python", tag, iterations,
                   _timed(lambda: encrypt_exponent(kp.pk, 7, params, rng), iterations))
    a, b = cts[0], cts[1]
    yield BenchRow("hom_combine", "python", tag, iterations * 10,
                   _timed(lambda: hom_combine(a, b, params), iterations * 10))
    yield BenchRow("fold", "python", f"{tag};n={iterations}", 1, _timed(lambda: fold(cts, params), 1))
    # cold includes building the baby-step table; warm reuses it
    target = encode(bound, params)
    _baby_steps.cache_clear()
    yield BenchRow("dlog_recover_cold", "python", f"{tag};B={bound}", 1,
                   _timed(lambda: dlog_recover(target, bound, params), 1))
    yield BenchRow("dlog_recover_warm", "python", f"{tag};B={bound}", 5,
                   _timed(lambda: dlog_recover(target, bound, params), 5))


def bench_mining(difficulty=8, blocks=20):
    """Blocks per second at ``difficulty`` (one single-transaction block each)."""
    chain = Chain(difficulty=difficulty, max_tx_per_block=1)
    chain.register("bench", "client", b"bench")
    chain.mine()
    payloads = [i.to_bytes(8, "big") for i in range(blocks)]
    for p in payloads:
        chain.submit_tx("bench", p)
    yield BenchRow("mine", _backend.BACKEND, f"difficulty={difficulty}", blocks, _timed(chain.mine, blocks))


def bench_kernels(iterations=20, seed=0):
    """Time every kernel under each importable backend."""
    rng = make_rng(seed)
    xp = rng.standard_normal((10, 8, 16, 16))
    prefix = b"\x00" * 72
    a, b, t = sigma_parameters(3.0)
    for name, mod in sorted(_backend.available().items()):
        cols = mod.im2col(xp, 3, 3, 1)
        yield BenchRow("im2col", name, "x=10x8x16x16;k=3", iterations,
                       _timed(lambda: mod.im2col(xp, 3, 3, 1), iterations))
        yield BenchRow("col2im", name, "x=10x8x16x16;k=3", iterations,
                       _timed(lambda: mod.col2im(cols, xp.shape, 3, 3, 1), iterations))
        yield BenchRow("search_nonce", name, "difficulty=12", iterations,
                       _timed(lambda: mod.search_nonce(prefix, 12), iterations))
        gen = np.random.PCG64(seed)
        yield BenchRow("dgauss_sample", name, "sigma=3;n=10000", iterations,
                       _timed(lambda: mod.dgauss_sample(gen, 10_000, a, b, t), iterations))
