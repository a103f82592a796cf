import sys

from cogload.expcli.cli import main

sys.exit(main())
