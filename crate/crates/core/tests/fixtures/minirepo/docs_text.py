s = "import app.config"  # import app.main
