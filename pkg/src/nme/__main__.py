import sys

from nme.cli import main

sys.exit(main())
