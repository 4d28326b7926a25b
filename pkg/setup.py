from setuptools import setup, find_packages

setup(
    name="repeatfree",
    version="0.1.0",
    packages=find_packages(exclude=["tests"]),
    install_requires=[
        "numpy>=1.24",
        "networkx>=3.1",
        "anytree>=2.12.1",
        "marko>=2.1.2",
        "pytest>=7.3.1",
        "pytest-mock>=3.14.0",
        "ruff==0.11.0",
    ],
    entry_points={"console_scripts": ["repeatfree=repeatfree.cli:main"]},
    description="Proper edge-colourings of complete graphs without repeated colour-isomorphic patterns",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.9",
)
