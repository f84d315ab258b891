# Optics services: dielectric models, transfer-matrix simulation, peak extraction
