import sys

from shadowtree.cli import main

sys.exit(main())
