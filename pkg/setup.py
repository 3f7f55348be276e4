import setuptools

setuptools.setup(
    name="thermal_cluster",
    version="1.0.0",
    description="Thermal GHZ unit cells, their fusion into cluster states and the finite temperature topological threshold",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    packages=["thermal_cluster"],
    install_requires=[
        "numpy",
        "scipy",
        "pint",
        "pandas>=1.5",
        "tabulate",
        "python-box",
        "pymatching>=2.0",
        "networkx",
    ],
    entry_points={"console_scripts": ["thermal_cluster=thermal_cluster.cli:run"]},
    python_requires=">=3.8",
    license="BSD 3-Clause “New” or “Revised” License",
    classifiers=["License :: OSI Approved :: BSD License"],
)
