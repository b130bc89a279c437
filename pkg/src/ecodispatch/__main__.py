import sys

from ecodispatch.cli import main

sys.exit(main())
