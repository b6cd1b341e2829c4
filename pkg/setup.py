from setuptools import setup, find_packages

setup(
    name="acex_framework",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    package_data={"acex": ["data/*.csv"]},
    install_requires=[
        "pandas",
        "numpy",
        "scipy",
        "scikit-learn",
        "joblib",
        "matplotlib",
        "seaborn",
        "pyyaml",
    ],
    entry_points={
        "console_scripts": [
            "acex=acex.cli:main",
        ],
    },
)
