# DUMA multiple-choice reading comprehension package
