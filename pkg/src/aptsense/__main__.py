from aptsense.cli import main

main()
