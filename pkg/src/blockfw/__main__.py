import sys

from blockfw.cli import main

sys.exit(main())
