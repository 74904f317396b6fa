import sys
from chiraldyn.Cli import main

sys.exit(main())
