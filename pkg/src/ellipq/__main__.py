import sys

from ellipq.cli import main

sys.exit(main())
