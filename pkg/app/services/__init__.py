# Services: polariton physics, optics, fitting, pipeline and reports
