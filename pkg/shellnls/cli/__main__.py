import sys

from shellnls.cli.app import main

sys.exit(main())
