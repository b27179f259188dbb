"""Printed metric tables used as reference values (cells kept as printed)."""

TABLE_1 = {"TD": (".625", ".53", ".62", ".57"), "AR": (".4", ".5", ".4", ".44"),
           "Average": (".516", ".51", ".52", ".51")}
TABLE_3 = {"TD": (".813", "1", ".81", ".9"), "AR": ("1", ".83", "1", ".91"),
           "Average": (".903", ".92", ".9", ".9")}
TABLE_6 = {"TD": (".688", "1", ".69", ".81"), "AR": ("1", ".5", "1", ".86"),
           "Average": (".839", ".88", ".84", ".84")}
TABLE_7 = {"TD": (".391", ".35", ".39", ".37"), "AR": (".553", ".6", ".55", ".58"),
           "Average": (".492", ".5", ".49", ".5")}
TABLE_12 = {"TD": (".608", ".74", ".61", ".67"), "AR": (".868", ".79", ".87", ".82"),
            "Average": (".77", ".77", ".77", ".77")}

# class sizes of the two age bands
ZERO_TO_SIX = (16, 15)
SIX_TO_TWELVE = (23, 38)
