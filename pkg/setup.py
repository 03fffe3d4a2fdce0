import setuptools
from setuptools import setup

with open("README.md", "r") as f:
    long_description = f.read()

setup(
    # Information
    name="varhom",
    description="Variational homogenization of monotone elliptic equations with random coefficients",
    long_description=long_description,
    long_description_content_type="text/markdown",
    version="0.1.0",
    license="MIT",
    keywords="homogenization monotone operators variational representation subadditivity",
    project_urls={},
    install_requires=[
        "numpy",
        "scipy>=1.12",
        "numba",
        "sortedcontainers",
        "colorlog",
    ],
    extras_require={
        "dev": ["black", "isort>=5.12", "pytest<8.0", "hypothesis", "flake8", "pre-commit"],
    },
    package_dir={"": "./"},
    packages=setuptools.find_packages(where="./", include=["varhom*"]),
    include_package_data=True,
    python_requires=">=3.8",
)
