import sys

from magpair.cli import main

sys.exit(main())
