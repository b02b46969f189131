"""Print the exception simulation table: each row's left side, right side,
steps taken and whether the type is kept."""

from fmc.encodings import check_ml_simulation

rep = check_ml_simulation(20)
for line in rep.lines():
    print(line)
