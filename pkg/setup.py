from setuptools import setup, find_packages

# Read requirements from requirements.txt
with open("requirements.txt") as f:
    required = f.read().splitlines()


# Read long description from README.md
with open("README.md", encoding="utf-8") as f:
    long_description = f.read()

setup(
    name="ncres",
    version="0.1.0",
    packages=find_packages(exclude=["tests"]),
    install_requires=required,
    entry_points={
        "console_scripts": [
            "ncres = ncres.cli:main",
        ],
    },
    python_requires=">=3.8",
    description="Exact verification of boundary noncommutative-residue computations on 4-manifolds",
    long_description=long_description,
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
)
