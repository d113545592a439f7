"""Console entry point.

Thread capping must happen before numpy is first imported, which is why
this module reads CDRM_THREADS and sets the BLAS environment knobs before
pulling in any package code.
"""

import os


def _cap_threads() -> None:
    threads = os.environ.get("CDRM_THREADS")
    if not threads:
        return
    if not threads.isdigit() or int(threads) < 1:
        raise SystemExit(f"CDRM_THREADS must be a positive integer, got {threads!r}")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, threads)


def main(argv=None) -> int:
    _cap_threads()
    from .cli import run

    return run(argv)


if __name__ == "__main__":
    raise SystemExit(main())
