"""Compiled vs. pure-Python repair kernel. Run from the repo root:

    python3 benchmarks/bench_repair.py --lengths 4 6 8 --chains 200
"""

import sys

from chaincheck.bench import main

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
