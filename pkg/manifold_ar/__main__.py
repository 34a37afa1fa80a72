import sys

from manifold_ar.cli import main

sys.exit(main())
