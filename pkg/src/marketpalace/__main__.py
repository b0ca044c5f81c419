from marketpalace.cli import main

main()
