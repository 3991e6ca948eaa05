import sys

from predlab.cli import main

sys.exit(main())
