import sys

from xydm.cli import main

sys.exit(main())
