from setuptools import setup

setup(
    name="p_capacity",
    py_modules=[
        "_config",
        "_constants",
        "_continuum",
        "_cut",
        "_edgelist",
        "_errors",
        "_lattice",
        "_network",
        "_quadrature",
        "_report",
        "_solver",
        "_verify",
        "capacity",
        "cli",
    ],
    package_dir={"": "src"},
    python_requires=">=3.10",
    install_requires=["numpy", "scipy", "networkx"],
)
