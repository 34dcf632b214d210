"""Builds fixtures/corpus: 20 hand-written datapoints, four per category.

Each script is executed once headlessly to produce its figure, which is how
the fixture is pre-validated. Rerun after editing: python3 make_fixture.py
"""
import hashlib
import json
import os
import shutil
import subprocess
import sys
import tempfile

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "corpus")

REASONING = """1. Characteristics of the data and CSV file:
{chars}
2. Possible plot types:
{possible}
3. Most suitable plot type:
{best}
4. Further considerations for the description:
{further}"""

ITEMS = [
    # ---- pairwise
    dict(id="fx-line", plot_type="line", topic="monthly temperature in oslo",
         description="Draw a line chart of the average monthly temperature in Oslo using the twelve values in tables/fx-line.csv. Put months on the x-axis, degrees Celsius on the y-axis, mark each point with a circle and add the title 'Oslo monthly temperature'.",
         table="month,temp_c\nJan,-4.3\nFeb,-4.0\nMar,-0.2\nApr,4.5\nMay,10.8\nJun,15.2\nJul,16.4\nAug,15.2\nSep,10.8\nOct,6.3\nNov,0.7\nDec,-3.1\n",
         code="""import matplotlib.pyplot as plt
months = ['Jan', 'Feb', 'Mar', 'Apr', 'May', 'Jun', 'Jul', 'Aug', 'Sep', 'Oct', 'Nov', 'Dec']
temps = [-4.3, -4.0, -0.2, 4.5, 10.8, 15.2, 16.4, 15.2, 10.8, 6.3, 0.7, -3.1]
fig, ax = plt.subplots(figsize=(8, 4))
ax.plot(months, temps, marker='o')
ax.set_xlabel('Month')
ax.set_ylabel('Temperature (C)')
ax.set_title('Oslo monthly temperature')
fig.savefig('figure.png')
""",
         chars="Two columns: a month label and a temperature in Celsius, twelve rows in calendar order.",
         possible="- Line Plot\n- Bar Chart", best="Line Plot",
         further="Keep the months in calendar order and label both axes."),
    dict(id="fx-scatter", plot_type="scatter", topic="study hours and exam scores",
         description="Make a scatter plot of study hours against exam score for the ten students in tables/fx-scatter.csv, with hours on the x-axis and score on the y-axis, green markers and a light grid.",
         table="hours,score\n1,52\n2,55\n3,61\n4,64\n5,70\n6,72\n7,79\n8,83\n9,88\n10,91\n",
         code="""import matplotlib.pyplot as plt
hours = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
scores = [52, 55, 61, 64, 70, 72, 79, 83, 88, 91]
fig, ax = plt.subplots()
ax.scatter(hours, scores, color='green')
ax.set_xlabel('Study hours')
ax.set_ylabel('Exam score')
ax.grid(alpha=0.3)
fig.savefig('figure.png')
""",
         chars="Two numeric columns, hours and score, with a positive association over ten rows.",
         possible="- Scatter Plot\n- Line Plot", best="Scatter Plot",
         further="Each point is one student, so do not connect the markers."),
    dict(id="fx-bar", plot_type="bar", topic="most spoken native languages",
         description="Create a bar chart of native speakers in millions for the five languages in tables/fx-bar.csv, one bar per language, sorted from largest to smallest, with the value written above each bar.",
         table="language,speakers_m\nMandarin,939\nSpanish,485\nEnglish,380\nHindi,345\nBengali,234\n",
         code="""import matplotlib.pyplot as plt
langs = ['Mandarin', 'Spanish', 'English', 'Hindi', 'Bengali']
speakers = [939, 485, 380, 345, 234]
fig, ax = plt.subplots()
bars = ax.bar(langs, speakers, color='steelblue')
for b, v in zip(bars, speakers):
    ax.text(b.get_x() + b.get_width() / 2, v + 10, str(v), ha='center')
ax.set_ylabel('Native speakers (millions)')
fig.savefig('figure.png')
""",
         chars="A categorical column of language names and one numeric column of speaker counts.",
         possible="- Bar Chart\n- Pie Chart", best="Bar Chart",
         further="Sort bars by value and annotate the counts."),
    dict(id="fx-step", plot_type="step", topic="parking garage occupancy",
         description="Draw a step plot of hourly parking garage occupancy from tables/fx-step.csv using the post step style, with the hour of day on the x-axis and occupied spaces on the y-axis.",
         table="hour,occupied\n6,20\n7,85\n8,160\n9,210\n10,220\n11,205\n12,180\n13,190\n14,200\n15,170\n16,120\n17,60\n18,30\n",
         code="""import matplotlib.pyplot as plt
hours = list(range(6, 19))
occupied = [20, 85, 160, 210, 220, 205, 180, 190, 200, 170, 120, 60, 30]
fig, ax = plt.subplots()
ax.step(hours, occupied, where='post')
ax.set_xlabel('Hour of day')
ax.set_ylabel('Occupied spaces')
fig.savefig('figure.png')
""",
         chars="Hourly counts that stay constant within each hour, thirteen rows.",
         possible="- Step Plot\n- Line Plot", best="Step Plot",
         further="Use the post step style so each value holds until the next hour."),
    # ---- statistical distribution
    dict(id="fx-histogram", plot_type="histogram", topic="adult height distribution",
         description="Plot a histogram of 1000 adult heights drawn from a normal distribution with mean 170 cm and standard deviation 8 cm (random seed 0), using 30 bins with black edges; tables/fx-histogram.csv lists the first sampled heights.",
         table="height_cm\n184.1\n173.2\n177.8\n187.9\n184.9\n162.2\n",
         code="""import numpy as np
import matplotlib.pyplot as plt
rng = np.random.default_rng(0)
heights = rng.normal(170, 8, 1000)
fig, ax = plt.subplots()
ax.hist(heights, bins=30, edgecolor='black')
ax.set_xlabel('Height (cm)')
ax.set_ylabel('Count')
fig.savefig('figure.png')
""",
         chars="A single numeric column of sampled heights.",
         possible="- Histogram\n- Box Plot\n- Violin Plot", best="Histogram",
         further="State the bin count and the sampling parameters."),
    dict(id="fx-boxplot", plot_type="boxplot", topic="department salaries",
         description="Create box plots comparing salaries in the four departments listed in tables/fx-boxplot.csv, one box per department, with the department names on the x-axis and salary in thousands on the y-axis.",
         table="department,salary_k\nSales,52\nSales,61\nSales,58\nEngineering,88\nEngineering,95\nEngineering,79\nSupport,41\nSupport,45\nSupport,39\nResearch,91\nResearch,102\nResearch,85\n",
         code="""import matplotlib.pyplot as plt
data = {
    'Sales': [52, 61, 58],
    'Engineering': [88, 95, 79],
    'Support': [41, 45, 39],
    'Research': [91, 102, 85],
}
fig, ax = plt.subplots()
ax.boxplot(list(data.values()))
ax.set_xticks(range(1, len(data) + 1))
ax.set_xticklabels(list(data.keys()))
ax.set_ylabel('Salary (thousands)')
fig.savefig('figure.png')
""",
         chars="Long-format data: a department label and a salary value per employee.",
         possible="- Box Plot\n- Violin Plot\n- Bar Chart", best="Box Plot",
         further="Group the rows by department before plotting."),
    dict(id="fx-violin", plot_type="violin", topic="sleep duration by age group",
         description="Draw violin plots of nightly sleep hours for three age groups, sampling 200 values per group from normal distributions with means 8.5, 7.2 and 6.8 hours (seed 1), and show the medians; tables/fx-violin.csv gives the group parameters.",
         table="group,mean_h,sd_h\nteen,8.5,0.9\nadult,7.2,0.8\nsenior,6.8,1.0\n",
         code="""import numpy as np
import matplotlib.pyplot as plt
rng = np.random.default_rng(1)
groups = [rng.normal(8.5, 0.9, 200), rng.normal(7.2, 0.8, 200), rng.normal(6.8, 1.0, 200)]
fig, ax = plt.subplots()
ax.violinplot(groups, showmedians=True)
ax.set_xticks([1, 2, 3])
ax.set_xticklabels(['teen', 'adult', 'senior'])
ax.set_ylabel('Sleep (hours)')
fig.savefig('figure.png')
""",
         chars="Three rows of distribution parameters: group name, mean and standard deviation.",
         possible="- Violin Plot\n- Box Plot", best="Violin Plot",
         further="Sample from each distribution and show medians."),
    dict(id="fx-pie", plot_type="pie", topic="household monthly budget",
         description="Make a pie chart of a household's monthly budget split into rent, food, transport, savings and leisure using tables/fx-pie.csv, showing each share as a percentage with one decimal.",
         table="category,amount\nrent,1200\nfood,450\ntransport,180\nsavings,300\nleisure,170\n",
         code="""import matplotlib.pyplot as plt
labels = ['rent', 'food', 'transport', 'savings', 'leisure']
amounts = [1200, 450, 180, 300, 170]
fig, ax = plt.subplots()
ax.pie(amounts, labels=labels, autopct='%1.1f%%')
ax.set_title('Monthly budget')
fig.savefig('figure.png')
""",
         chars="Five budget categories with amounts that form parts of a whole.",
         possible="- Pie Chart\n- Bar Chart", best="Pie Chart",
         further="Show percentages on the slices."),
    # ---- gridded
    dict(id="fx-heatmap", plot_type="heatmap", topic="weekly website traffic by hour",
         description="Create a heatmap of website visits by weekday and six four-hour blocks from tables/fx-heatmap.csv, with weekdays as rows, time blocks as columns, the 'viridis' colormap and a colorbar.",
         table="day,b0,b4,b8,b12,b16,b20\nMon,12,5,80,95,70,40\nTue,10,6,85,99,72,38\nWed,11,4,90,97,75,41\nThu,13,5,88,94,71,45\nFri,15,7,70,85,60,55\nSat,25,9,30,50,65,70\nSun,22,8,25,45,60,66\n",
         code="""import numpy as np
import matplotlib.pyplot as plt
days = ['Mon', 'Tue', 'Wed', 'Thu', 'Fri', 'Sat', 'Sun']
visits = np.array([
    [12, 5, 80, 95, 70, 40],
    [10, 6, 85, 99, 72, 38],
    [11, 4, 90, 97, 75, 41],
    [13, 5, 88, 94, 71, 45],
    [15, 7, 70, 85, 60, 55],
    [25, 9, 30, 50, 65, 70],
    [22, 8, 25, 45, 60, 66],
])
fig, ax = plt.subplots()
im = ax.imshow(visits, cmap='viridis', aspect='auto')
ax.set_yticks(range(len(days)))
ax.set_yticklabels(days)
ax.set_xticks(range(6))
ax.set_xticklabels(['0h', '4h', '8h', '12h', '16h', '20h'])
fig.colorbar(im, ax=ax, label='Visits')
fig.savefig('figure.png')
""",
         chars="A 7 by 6 matrix of counts with weekday rows and time-block columns.",
         possible="- Heatmap\n- Pseudocolor Mesh", best="Heatmap",
         further="Label both axes with the row and column names."),
    dict(id="fx-contourf", plot_type="contourf", topic="saddle surface elevation",
         description="Draw a filled contour plot of z = x^2 - y^2 on a 100 by 100 grid over [-2, 2] in both directions with 15 levels and a colorbar; tables/fx-contourf.csv samples the grid coarsely.",
         table="x,y,z\n-2,-2,0\n-2,0,4\n-2,2,0\n0,-2,-4\n0,0,0\n0,2,-4\n2,-2,0\n2,0,4\n2,2,0\n",
         code="""import numpy as np
import matplotlib.pyplot as plt
x = np.linspace(-2, 2, 100)
y = np.linspace(-2, 2, 100)
X, Y = np.meshgrid(x, y)
Z = X ** 2 - Y ** 2
fig, ax = plt.subplots()
cs = ax.contourf(X, Y, Z, levels=15)
fig.colorbar(cs, ax=ax)
fig.savefig('figure.png')
""",
         chars="Columns x, y and z on a regular grid.",
         possible="- Filled Contour Plot\n- Heatmap\n- 3D Surface Plot", best="Filled Contour Plot",
         further="Use enough levels to show the saddle shape."),
    dict(id="fx-quiver", plot_type="quiver", topic="rotating vector field",
         description="Create a quiver plot of the rotational vector field (-y, x) on a 15 by 15 grid over [-1, 1] in both directions with equal axis scaling; tables/fx-quiver.csv lists sample vectors.",
         table="x,y,u,v\n-1,-1,1,-1\n-1,1,-1,-1\n1,-1,1,1\n1,1,-1,1\n0,1,-1,0\n",
         code="""import numpy as np
import matplotlib.pyplot as plt
x = np.linspace(-1, 1, 15)
X, Y = np.meshgrid(x, x)
fig, ax = plt.subplots()
ax.quiver(X, Y, -Y, X)
ax.set_aspect('equal')
fig.savefig('figure.png')
""",
         chars="Positions x, y with vector components u, v.",
         possible="- Quiver Plot\n- Streamplot", best="Quiver Plot",
         further="Keep the aspect ratio equal so arrows are not distorted."),
    dict(id="fx-streamplot", plot_type="streamplot", topic="vortex flow field",
         description="Draw a streamplot of a vortex with velocity u = -y and v = x on a 50 by 50 grid over [-3, 3], with line widths proportional to speed; tables/fx-streamplot.csv samples the velocity field.",
         table="x,y,u,v\n-3,0,0,-3\n3,0,0,3\n0,3,-3,0\n0,-3,3,0\n",
         code="""import numpy as np
import matplotlib.pyplot as plt
x = np.linspace(-3, 3, 50)
X, Y = np.meshgrid(x, x)
U, V = -Y, X
speed = np.sqrt(U ** 2 + V ** 2)
fig, ax = plt.subplots()
ax.streamplot(X, Y, U, V, linewidth=2 * speed / speed.max())
fig.savefig('figure.png')
""",
         chars="Grid positions with velocity components.",
         possible="- Streamplot\n- Quiver Plot", best="Streamplot",
         further="Scale line width by speed."),
    # ---- irregularly gridded
    dict(id="fx-contour", plot_type="contour", topic="weather station temperatures",
         description="Draw labeled contour lines of temperature measured at 60 scattered weather stations (random seed 2, temperature 15 + 5 sin(x) cos(y)) using tricontour, and overlay the station locations as small black dots; tables/fx-contour.csv lists sample stations.",
         table="x,y,temp\n0.5,1.2,16.2\n2.1,0.3,18.9\n3.3,2.8,13.7\n1.7,2.2,14.1\n",
         code="""import numpy as np
import matplotlib.pyplot as plt
rng = np.random.default_rng(2)
x = rng.uniform(0, 4, 60)
y = rng.uniform(0, 4, 60)
t = 15 + 5 * np.sin(x) * np.cos(y)
fig, ax = plt.subplots()
cs = ax.tricontour(x, y, t, levels=8)
ax.clabel(cs, fontsize=8)
ax.plot(x, y, 'k.', markersize=3)
fig.savefig('figure.png')
""",
         chars="Scattered station coordinates with one temperature value each.",
         possible="- Contour Plot\n- Scatter Plot", best="Contour Plot",
         further="Interpolate over a triangulation because the stations are irregular."),
    dict(id="fx-tricontourf", plot_type="tricontourf", topic="soil ph across a farm",
         description="Create a filled tricontour plot of soil pH at 120 irregular sampling points (seed 3, pH 6.5 + 0.8 x exp(-x^2 - y^2)) with a colorbar; tables/fx-tricontourf.csv shows example samples.",
         table="x,y,ph\n0.1,0.2,6.57\n-1.2,0.4,6.26\n0.8,-0.9,6.71\n",
         code="""import numpy as np
import matplotlib.pyplot as plt
rng = np.random.default_rng(3)
x = rng.uniform(-2, 2, 120)
y = rng.uniform(-2, 2, 120)
ph = 6.5 + 0.8 * x * np.exp(-x ** 2 - y ** 2)
fig, ax = plt.subplots()
cs = ax.tricontourf(x, y, ph, levels=12)
fig.colorbar(cs, ax=ax, label='pH')
fig.savefig('figure.png')
""",
         chars="Irregular sample coordinates with a pH value.",
         possible="- Filled Triangular Contour\n- Triangular Pseudocolor", best="Filled Triangular Contour",
         further="Add a colorbar labeled pH."),
    dict(id="fx-tripcolor", plot_type="tripcolor", topic="estuary salinity",
         description="Make a tripcolor plot with Gouraud shading of salinity at 200 random points (seed 4, salinity 30 sin(3x) cos(3y) shifted to positive) and a colorbar; tables/fx-tripcolor.csv lists a few points.",
         table="x,y,salinity\n0.1,0.9,31.2\n0.5,0.5,29.8\n0.9,0.2,33.0\n",
         code="""import numpy as np
import matplotlib.pyplot as plt
rng = np.random.default_rng(4)
x = rng.uniform(0, 1, 200)
y = rng.uniform(0, 1, 200)
s = 30 + 5 * np.sin(3 * x) * np.cos(3 * y)
fig, ax = plt.subplots()
tpc = ax.tripcolor(x, y, s, shading='gouraud')
fig.colorbar(tpc, ax=ax)
fig.savefig('figure.png')
""",
         chars="Irregular points in the unit square with a salinity value.",
         possible="- Triangular Pseudocolor\n- Filled Triangular Contour", best="Triangular Pseudocolor",
         further="Gouraud shading smooths the triangles."),
    dict(id="fx-triplot", plot_type="triplot", topic="finite element mesh",
         description="Draw the Delaunay triangulation of 40 random points (seed 5) with triplot in thin gray lines and mark the vertices with blue dots; tables/fx-triplot.csv lists sample vertices.",
         table="x,y\n0.12,0.55\n0.87,0.33\n0.45,0.91\n0.66,0.08\n",
         code="""import numpy as np
import matplotlib.pyplot as plt
import matplotlib.tri as mtri
rng = np.random.default_rng(5)
x = rng.uniform(0, 1, 40)
y = rng.uniform(0, 1, 40)
tri = mtri.Triangulation(x, y)
fig, ax = plt.subplots()
ax.triplot(tri, color='gray', linewidth=0.5)
ax.plot(x, y, 'b.')
fig.savefig('figure.png')
""",
         chars="Vertex coordinates without values.",
         possible="- Triangular Grid Plot\n- Scatter Plot", best="Triangular Grid Plot",
         further="Thin edges keep the mesh readable."),
    # ---- 3D and volumetric
    dict(id="fx-3d-scatter", plot_type="3d_scatter", topic="drone survey waypoints",
         description="Create a 3D scatter plot of six drone survey waypoints from tables/fx-3d-scatter.csv, coloring each point by altitude (z) with the 'plasma' colormap and labeling the x, y and z axes.",
         table="x,y,z\n0.1,0.2,0.3\n0.4,0.1,0.9\n0.7,0.8,0.2\n0.5,0.5,0.5\n0.9,0.3,0.7\n0.2,0.9,0.4\n",
         code="""import matplotlib.pyplot as plt
xs = [0.1, 0.4, 0.7, 0.5, 0.9, 0.2]
ys = [0.2, 0.1, 0.8, 0.5, 0.3, 0.9]
zs = [0.3, 0.9, 0.2, 0.5, 0.7, 0.4]
fig = plt.figure()
ax = fig.add_subplot(projection='3d')
ax.scatter(xs, ys, zs, c=zs, cmap='plasma')
ax.set_xlabel('x')
ax.set_ylabel('y')
ax.set_zlabel('z')
fig.savefig('figure.png')
""",
         chars="Three numeric columns x, y, z describing points in space.",
         possible="- 3D Scatter Plot\n- Scatter Plot", best="3D Scatter Plot",
         further="Color by z to convey depth."),
    dict(id="fx-3d-surface", plot_type="3d_surface", topic="ripple surface",
         description="Plot the 3D surface z = sin(sqrt(x^2 + y^2)) over [-5, 5] in both directions on a 60 by 60 grid with the 'viridis' colormap; tables/fx-3d-surface.csv samples the surface.",
         table="x,y,z\n0,0,0\n1,0,0.841\n0,2,0.909\n3,4,-0.959\n",
         code="""import numpy as np
import matplotlib.pyplot as plt
x = np.linspace(-5, 5, 60)
X, Y = np.meshgrid(x, x)
Z = np.sin(np.sqrt(X ** 2 + Y ** 2))
fig = plt.figure()
ax = fig.add_subplot(projection='3d')
ax.plot_surface(X, Y, Z, cmap='viridis')
fig.savefig('figure.png')
""",
         chars="x, y and z values of a smooth function.",
         possible="- 3D Surface Plot\n- Filled Contour Plot\n- Heatmap", best="3D Surface Plot",
         further="Use a colormap to show height."),
    dict(id="fx-3d-wireframe", plot_type="3d_wireframe", topic="gaussian bell surface",
         description="Draw a 3D wireframe of the Gaussian bell z = exp(-(x^2 + y^2)) over [-2, 2] on a 30 by 30 grid with row and column strides of 2; tables/fx-3d-wireframe.csv samples the surface.",
         table="x,y,z\n0,0,1\n1,0,0.368\n1,1,0.135\n2,2,0.0003\n",
         code="""import numpy as np
import matplotlib.pyplot as plt
x = np.linspace(-2, 2, 30)
X, Y = np.meshgrid(x, x)
Z = np.exp(-(X ** 2 + Y ** 2))
fig = plt.figure()
ax = fig.add_subplot(projection='3d')
ax.plot_wireframe(X, Y, Z, rstride=2, cstride=2)
fig.savefig('figure.png')
""",
         chars="Grid samples of a smooth bell-shaped function.",
         possible="- 3D Wireframe Plot\n- 3D Surface Plot", best="3D Wireframe Plot",
         further="Strides of 2 keep the mesh light."),
    dict(id="fx-3d-bar", plot_type="3d_bar", topic="regional monthly sales",
         description="Create a 3D bar chart of monthly sales for three regions over four months from tables/fx-3d-bar.csv, with months along x, regions along y and bar height equal to sales.",
         table="month,region,sales\n1,0,10\n1,1,14\n1,2,8\n2,0,12\n2,1,15\n2,2,9\n3,0,13\n3,1,17\n3,2,11\n4,0,15\n4,1,18\n4,2,12\n",
         code="""import numpy as np
import matplotlib.pyplot as plt
months = np.repeat([1, 2, 3, 4], 3)
regions = np.tile([0, 1, 2], 4)
sales = [10, 14, 8, 12, 15, 9, 13, 17, 11, 15, 18, 12]
fig = plt.figure()
ax = fig.add_subplot(projection='3d')
ax.bar3d(months, regions, np.zeros(12), 0.5, 0.5, sales)
ax.set_xlabel('Month')
ax.set_ylabel('Region')
ax.set_zlabel('Sales')
fig.savefig('figure.png')
""",
         chars="Two categorical axes (month, region) and one value column.",
         possible="- 3D Bar Chart\n- Heatmap\n- Bar Chart", best="3D Bar Chart",
         further="Label all three axes."),
]


def main():
    if os.path.exists(OUT):
        shutil.rmtree(OUT)
    os.makedirs(os.path.join(OUT, "figures"))
    os.makedirs(os.path.join(OUT, "tables"))
    lines = []
    for k, it in enumerate(ITEMS):
        with tempfile.TemporaryDirectory() as wd:
            with open(os.path.join(wd, "s.py"), "w") as f:
                f.write(it["code"])
            env = dict(os.environ, MPLBACKEND="Agg", MPLCONFIGDIR=wd)
            subprocess.run([sys.executable, "s.py"], cwd=wd, env=env, check=True)
            shutil.copy(os.path.join(wd, "figure.png"),
                        os.path.join(OUT, "figures", it["id"] + ".png"))
        with open(os.path.join(OUT, "tables", it["id"] + ".csv"), "w", newline="") as f:
            f.write(it["table"])
        reasoning = REASONING.format(**{k2: it[k2] for k2 in ("chars", "possible", "best", "further")})
        dp = {
            "id": it["id"],
            "plot_type": it["plot_type"],
            "description": it["description"],
            "code": it["code"],
            "data_table": "tables/" + it["id"] + ".csv",
            "reasoning": reasoning,
            "figure_path": "figures/" + it["id"] + ".png",
            "split": "test" if k % 5 == 4 else "train",
            "provenance": {
                "topic": it["topic"],
                "stage_hashes": {"code": hashlib.sha256(it["code"].encode()).hexdigest()},
            },
        }
        lines.append(json.dumps(dp, ensure_ascii=False))
    with open(os.path.join(OUT, "corpus.jsonl"), "w") as f:
        f.write("\n".join(lines) + "\n")
    print(len(lines), "items")


if __name__ == "__main__":
    main()
