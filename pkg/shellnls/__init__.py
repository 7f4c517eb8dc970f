"""
shellnls: уравнение Шрёдингера в ℝ³ с нелинейностью, сосредоточенной
на единичной сфере. Динамика сводится к уравнению Вольтерры для заряда
на S²; поле восстанавливается в ганкелевом представлении.
"""

__version__ = "0.1.0"
