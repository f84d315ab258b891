# Fitting services: peak datasets and dispersion fits
