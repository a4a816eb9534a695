"""
Entry point of the tensor completion toolkit when run from a source checkout.

    python main.py complete --input y.dt3 --mask o.dt3 -o xhat.dt3
"""

import sys

from cli.main import main

if __name__ == "__main__":
    sys.exit(main())
