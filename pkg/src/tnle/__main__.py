from tnle.cli import main

main()
