from . import plotdata, recipes, run, schema

COMMANDS = (run, recipes, plotdata, schema)
