"""Allow ``python -m pwcbf`` as an alternative to the ``pwcbf`` script."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
