"""Setup configuration for the manifold AR(1) toolkit."""

from setuptools import find_packages, setup

setup(
    name="manifold_ar",
    packages=find_packages(exclude=["tests", "tests.*"]),
    install_requires=[
        "numpy",
        "scipy",
        "pydantic>=2",
        "python-dotenv",
        "tqdm",
        "colorama",
    ],
    entry_points={"console_scripts": ["manifold-ar=manifold_ar.cli:main"]},
)
