# Polariton physics services: Hopfield core, cavity dispersion, charged-polariton observables
