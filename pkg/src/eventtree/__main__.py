import sys

from eventtree.cli import main

sys.exit(main())
