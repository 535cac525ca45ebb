from mixhit.cli import main

raise SystemExit(main())
