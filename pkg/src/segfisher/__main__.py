import sys

from segfisher.cli import main

sys.exit(main())
