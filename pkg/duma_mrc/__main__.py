import sys

from duma_mrc.cli import main

if __name__ == "__main__":
    sys.exit(main())
