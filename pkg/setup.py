from setuptools import find_packages, setup


# Read the README file for long description
def read_readme():
    with open("README.md", "r", encoding="utf-8") as fh:
        return fh.read()


# Read requirements from requirements.txt
def read_requirements():
    with open("requirements.txt", "r", encoding="utf-8") as fh:
        return [
            line.strip() for line in fh if line.strip() and not line.startswith("#")
        ]


setup(
    name="two-domain-hjb",
    version="1.0.0",
    author="Daniel Precioso",
    author_email="daniel.precioso@ie.edu",
    description="Value functions of optimal control problems with a discontinuity across a hyperplane",
    long_description=read_readme(),
    long_description_content_type="text/markdown",
    url="https://github.com/daniprec/two-domain-hjb",
    project_urls={
        "Bug Reports": "https://github.com/daniprec/two-domain-hjb/issues",
        "Source": "https://github.com/daniprec/two-domain-hjb",
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3.10",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    keywords="hamilton-jacobi-bellman, optimal control, discontinuous dynamics, viscosity solutions",
    packages=find_packages(exclude=["tests", "scripts"]),
    python_requires=">=3.10",
    install_requires=read_requirements(),
    extras_require={"test": ["pytest>=8.0"]},
    entry_points={
        "console_scripts": [
            "twodomain=twodomain.cli:main",
        ],
    },
    zip_safe=False,
    license="MIT",
)
