from bilateral_closeout.cli import run

run()
