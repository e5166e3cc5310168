import sys

from hfrag.cli import main

sys.exit(main())
