from freebound.cli import main
import sys

sys.exit(main())
