"""Figure rendering for endosim artifacts; file formats are the only contract."""

from .recipes import RECIPES, FigureRecipe, RecipeError, build_spec, read_csv_columns
from .render import draw, render

__version__ = "0.1.0"
