"""Allow `python -m germlab`."""

from .cli import main

raise SystemExit(main())
