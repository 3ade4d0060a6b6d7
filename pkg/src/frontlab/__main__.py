import sys

from frontlab.cli import main

sys.exit(main())
