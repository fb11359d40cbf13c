import sys

from asep_lab.main import main

if __name__ == "__main__":
    sys.exit(main())
