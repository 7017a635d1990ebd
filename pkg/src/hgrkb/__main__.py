import sys

from hgrkb.cli import main

sys.exit(main())
