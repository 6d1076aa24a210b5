from setuptools import setup, find_packages

setup(
    name="rln2",
    version="0.1.0",
    packages=find_packages(exclude=["tests"]),
    python_requires=">=3.10",
    install_requires=[
        "numpy",
        "pandas",
        "contexttimer",
        "torch",
        "scipy",
        "Pillow",
        "scikit-image",
    ],
    entry_points={"console_scripts": ["rln2=rln2.harness.cli:main"]},
)
